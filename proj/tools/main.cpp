#include "stakemkt/cli.hpp"

int main(int argc, char** argv) { return stakemkt::run_cli(argc, argv); }
