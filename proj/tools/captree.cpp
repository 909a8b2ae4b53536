#include <cstdio>
int main() { std::puts("captree"); return 0; }
