#include "corpex/cli.hpp"

int main(int argc, char** argv) { return corpex::cli_main(argc, argv); }
