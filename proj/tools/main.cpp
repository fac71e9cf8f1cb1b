#include "cli.hpp"

int main(int argc, char** argv) { return rse::cli::run(argc, argv); }
