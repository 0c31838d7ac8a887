#include "famus/cli.hpp"

int main(int argc, char** argv) { return famus::cli_main(argc, argv); }
