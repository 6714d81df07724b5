#include <iostream>

#include "gift/cli.hpp"

int main(int argc, char** argv) { return gift::dispatch(argc, argv, std::cout, std::cerr); }
