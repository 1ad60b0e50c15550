#include "sphflow/cli.hpp"

int main(int argc, char** argv) { return sphflow::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
