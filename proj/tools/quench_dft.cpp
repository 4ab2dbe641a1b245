#include "quench/cli.hpp"

int main(int argc, char** argv) { return quench::cli::main(argc, argv); }
