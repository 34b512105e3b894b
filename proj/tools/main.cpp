#include "dkspde/cli.hpp"

int main(int argc, char** argv) { return dkspde::cli::main(argc, argv); }
