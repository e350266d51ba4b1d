#include <iostream>
#include <string>
#include <vector>

#include "planet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return planet::cli::run(args, std::cout, std::cerr);
}
