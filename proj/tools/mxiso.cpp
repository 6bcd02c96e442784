#include "mxiso/cli.hpp"

int main(int argc, char** argv) { return mxiso::cli::run(argc, argv); }
