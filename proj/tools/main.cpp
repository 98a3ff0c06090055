#include "sigtrain/cli.hpp"

int main(int argc, char** argv) { return sigtrain::cli_main(argc, argv); }
