#include "flat4/cli.hpp"

int main(int argc, char** argv) { return flat4::cli::main(argc, argv); }
