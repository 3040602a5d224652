#include "wasep/cli.hpp"

int main(int argc, char** argv) { return wasep::run_cli(argc, argv); }
