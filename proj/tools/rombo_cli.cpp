#include "rombo/cli.hpp"

int main(int argc, char** argv) { return rombo::run_cli(argc, argv); }
