#include "editopt/cli.hpp"

int main(int argc, char** argv) { return editopt::cli::run(argc, argv); }
