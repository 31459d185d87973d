#include "l4semu_cli/commands.hpp"

int main(int argc, char** argv) { return l4semu::cli::run(argc, argv); }
