#include "hbbm/cli.hpp"

int main(int argc, char** argv) { return hbbm::cli::main(argc, argv); }
