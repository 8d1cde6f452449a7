#include "saso/cli.hpp"

int main(int argc, char** argv) { return saso::cli::run(argc, argv); }
