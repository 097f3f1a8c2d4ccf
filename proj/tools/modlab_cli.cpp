#include "cli.hpp"

int main(int argc, char** argv) { return modlab::run_cli(argc, argv); }
