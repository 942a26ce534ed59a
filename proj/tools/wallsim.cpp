#include "wallsim/cli.hpp"

int main(int argc, char** argv) { return wallsim::cli::run(argc, argv); }
