#include "rhl/cli.hpp"

int main(int argc, char** argv) { return rhl::run_cli(argc, argv); }
