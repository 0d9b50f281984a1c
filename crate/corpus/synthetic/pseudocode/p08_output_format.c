int __fastcall main(int argc, const char **argv, const char **envp)
{
  int n; // [rsp+8h] [rbp-18h] BYREF
  int i; // [rsp+Ch] [rbp-14h]
  _QWORD *v6; // [rsp+10h] [rbp-10h]

  scanf("%d", &n);
  v6 = malloc(8LL * n);
  for ( i = 0; i < n; ++i )
    scanf("%lld", &v6[i]);
  for ( i = n - 1; i >= 0; --i )
  {
    printf("%lld", v6[i]);
    if ( i )
      putchar(32);
  }
  putchar(10);
  free(v6);
  return 0;
}
