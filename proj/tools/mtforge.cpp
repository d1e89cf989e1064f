#include "mtforge/cli.hpp"

int main(int argc, char** argv) { return mtf::cli::main(argc, argv); }
