#include "msbtree/cli.hpp"

int main(int argc, char** argv) { return msbtree::cli::run(argc, argv); }
