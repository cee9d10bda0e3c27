#include <iostream>

#include "besselcz/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return besselcz::run_cli(args, std::cout, std::cerr);
}
