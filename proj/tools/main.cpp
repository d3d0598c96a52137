#include "nvqrng/cli.hpp"

int main(int argc, char** argv) { return nvqrng::cli::run(argc, argv); }
