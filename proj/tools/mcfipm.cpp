#include "mcfipm/cli.hpp"

int main(int argc, char** argv) { return mcfipm::cli_main(argc, argv); }
