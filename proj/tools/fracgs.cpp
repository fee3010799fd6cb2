#include "fracgs/cli.hpp"

int main(int argc, char** argv) { return fracgs::cli::run(argc, argv); }
