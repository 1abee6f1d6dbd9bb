#include "modalenv/cli.hpp"

int main(int argc, char** argv) { return modalenv::cli::cli_entry(argc, argv); }
