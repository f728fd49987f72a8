#include "cpstir/cli.hpp"

int main(int argc, char** argv) { return cpstir::cli::main(argc, argv); }
