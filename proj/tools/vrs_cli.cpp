#include "vrs/cli.hpp"

int main(int argc, char** argv) { return vrs::cli_main(argc, argv); }
