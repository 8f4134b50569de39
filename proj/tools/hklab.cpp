#include "hklab/cli/commands.hpp"

int main(int argc, char** argv) { return hklab::cli::run_cli(argc, argv); }
