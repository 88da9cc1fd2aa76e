#include "prereq/cli.hpp"

int main(int argc, char** argv) { return prereq::cli_main(argc, argv); }
