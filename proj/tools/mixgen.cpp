#include "mixgen/cli.hpp"

int main(int argc, char** argv) { return mixgen::cli::run(argc, argv); }
