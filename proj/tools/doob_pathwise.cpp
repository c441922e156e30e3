#include <iostream>
#include <variant>

#include "doob/cli.hpp"

int main(int argc, char** argv) {
    auto parsed = doob::cli::parse_command_line(argc, argv, std::cout, std::cerr);
    if (const int* status = std::get_if<int>(&parsed)) return *status;
    return doob::cli::run(std::get<doob::cli::RunConfig>(parsed), std::cout, std::cerr);
}
