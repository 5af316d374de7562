#include "oedgrid/cli.hpp"

int main(int argc, char** argv) { return oedgrid::run_cli(argc, argv); }
