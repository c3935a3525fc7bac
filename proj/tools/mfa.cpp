#include "mfa/cli.hpp"

int main(int argc, char** argv) { return mfa::run_cli(argc, argv); }
