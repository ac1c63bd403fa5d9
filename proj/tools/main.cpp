#include "cli.hpp"

int main(int argc, char** argv) { return fieldforge::cli::cli_dispatch(argc, argv); }
