#include "geohall/cli.hpp"

int main(int argc, char** argv) { return geohall::cli::run(argc, argv); }
