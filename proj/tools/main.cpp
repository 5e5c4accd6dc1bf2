#include "commands.hpp"

int main(int argc, char** argv) { return stsr::cli::run(argc, argv); }
