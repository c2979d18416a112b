#include "greet/cli.hpp"

int main(int argc, char** argv) { return greet::run_cli(argc, argv); }
