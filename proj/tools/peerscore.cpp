#include "peerscore/cli.hpp"

int main(int argc, char** argv) { return peerscore::cli::run(argc, argv); }
