int __fastcall main(int argc, const char **argv, const char **envp)
{
  int n; // [rsp+4h] [rbp-1Ch] BYREF
  int i; // [rsp+8h] [rbp-18h]
  int v7; // [rsp+Ch] [rbp-14h]
  _DWORD *v8; // [rsp+10h] [rbp-10h]

  scanf("%d", &n);
  v8 = malloc(4LL * n);
  for ( i = 0; i < n; ++i )
    scanf("%d", &v8[i]);
  v7 = *v8;
  for ( i = 1; i < n; ++i )
  {
    if ( v7 < (int)v8[i] )
      v7 = v8[i];
  }
  printf("%d\n", (unsigned int)v7);
  free(v8);
  return 0;
}
