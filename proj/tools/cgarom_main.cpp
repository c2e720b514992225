#include "cgarom/cli.hpp"

int main(int argc, char** argv) { return cgarom::run_cli(argc, argv); }
