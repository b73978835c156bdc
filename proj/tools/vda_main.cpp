#include "vda/cli.hpp"

int main(int argc, char** argv) { return vda::run_command(argc, argv); }
