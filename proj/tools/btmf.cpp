#include "btmf_cli.hpp"

int main(int argc, char** argv) { return btmf::cli::cli_dispatch(argc, argv); }
