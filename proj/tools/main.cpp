#include "commands.hpp"

int main(int argc, char** argv) { return tvar::cli::run(argc, argv); }
