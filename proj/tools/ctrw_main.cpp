#include "ctrw/cli.hpp"

int main(int argc, char** argv) { return ctrw::run_cli(argc, argv); }
