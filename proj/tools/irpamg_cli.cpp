#include "commands.hpp"

int main(int argc, char** argv) { return irpamg::cli::run(argc, argv); }
