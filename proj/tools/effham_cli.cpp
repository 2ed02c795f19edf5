#include "effham/cli.hpp"

int main(int argc, char** argv) { return effham::cli::main(argc, argv); }
