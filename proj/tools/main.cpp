#include "mgcn/cli.hpp"

int main(int argc, char** argv) { return mgcn::cli::run(argc, argv); }
