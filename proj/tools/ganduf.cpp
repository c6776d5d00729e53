#include "ganduf/cli.hpp"

int main(int argc, char** argv) { return ganduf::cli::run(argc, argv); }
