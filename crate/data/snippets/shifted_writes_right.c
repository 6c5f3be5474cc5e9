const int N = 64;

void shift(int v[65])
{
    int i;
    int aux;
    for (i = 0; i < N - 1; i++) {
        aux = i * i;
        v[i + 1] = aux;
    }
}
