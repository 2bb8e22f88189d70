#include "netpricing/cli.hpp"

int main(int argc, char** argv) {
    return netpricing::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
