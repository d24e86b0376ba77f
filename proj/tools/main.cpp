#include "cli.hpp"

int main(int argc, char** argv) { return secimg::cli::run(argc, argv); }
