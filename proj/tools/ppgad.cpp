#include "ppgad/cli.hpp"

int main(int argc, char** argv) { return ppgad::cli::run(argc, argv); }
