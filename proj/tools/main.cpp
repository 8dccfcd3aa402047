#include "ddenet_cli.hpp"

int main(int argc, char** argv) { return ddenet::cli::run(argc, argv); }
