#include "chainid/cli.hpp"

int main(int argc, char** argv) { return chainid::cli::run(argc, argv); }
