const int N = 16;

void gather(int v[16], int w[16])
{
    int j;
    int aux;
    aux = 0;
    for (j = 0; j < N; j++) {
        w[j] = v[aux];
        aux++;
    }
}
