#include "hpencil/cli/runner.hpp"

int main(int argc, char** argv) { return hp::cli::main_entry(argc, argv); }
