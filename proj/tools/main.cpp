#include "cascadeprune/cli.hpp"

int main(int argc, char** argv) { return cascadeprune::run_cli(argc, argv); }
