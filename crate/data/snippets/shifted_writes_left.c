const int N = 64;

void shift(int v[65])
{
    int i;
    for (i = 1; i < N; i += 2) {
        v[i] = v[i - 1];
        v[i + 1] = v[i - 1] * i;
    }
}
