#include "rawpipe/cli.hpp"

int main(int argc, char** argv) { return rawpipe::cli::run(argc, argv); }
