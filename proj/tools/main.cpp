#include "cli.hpp"

int main(int argc, char** argv) { return liddense::cli::run(argc, argv); }
